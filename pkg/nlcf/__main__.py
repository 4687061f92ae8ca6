"""python -m nlcf."""

import sys

from nlcf.main import main

sys.exit(main())
