"""python -m lelong"""

import sys

from lelong.cli import main

sys.exit(main())
