import sys

from steinpoly.cli import main

sys.exit(main())
