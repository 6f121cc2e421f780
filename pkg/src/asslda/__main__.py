import sys

from asslda.cli import main

sys.exit(main())
