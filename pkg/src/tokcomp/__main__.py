import sys

from tokcomp.cli import main

sys.exit(main())
