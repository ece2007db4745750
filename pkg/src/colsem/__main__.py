import sys

from colsem.cli import main

sys.exit(main())
