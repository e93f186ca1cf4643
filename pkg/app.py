import sys
from pathlib import Path

# Add src to Python path
src_path = Path(__file__).parent / "src"
sys.path.append(str(src_path))

from habitprox.cli.commands import main  # noqa: E402

if __name__ == "__main__":
    main()
