import sys

from comcons.cli import main

sys.exit(main())
