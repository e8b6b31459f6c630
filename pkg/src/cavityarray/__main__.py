import sys

from cavityarray.cli import main

sys.exit(main())
