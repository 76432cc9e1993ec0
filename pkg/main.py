import sys

from tunnelling.jobs.cli import main

if __name__ == "__main__":
    sys.exit(main())
