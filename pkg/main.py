import sys

from cli.commands import run

"""
Entry point of the satgen command line.
"""


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
