import sys

from navsecure.main import run


def console_entry() -> None:
    """
    Entrypoint for the command line. Parses arguments, runs the command and exits with its code.
    """
    sys.exit(run())


if __name__ == "__main__":
    console_entry()
