import sys

from cli.main import main as cli_main
from utils.logger import logger


def main():
    logger.debug("Starting bn-reduction")
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
