"""Console entry point of EMHD Lab."""
import sys
from typing import Optional, Sequence

from emhd_lab.ui.terminal import TerminalUI


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the command line and return its exit code."""
    app = TerminalUI()
    return app.run(argv)


if __name__ == "__main__":
    sys.exit(main())
