"""
Run the random-graph lab from the command line
"""

import logging
import sys

from rglab.cli import main
from rglab.config import log_level

if __name__ == '__main__':
    logging.basicConfig(format='%(asctime)s %(levelname)s %(message)s')
    logging.getLogger().setLevel(log_level())

    sys.exit(main(sys.argv[1:]))
