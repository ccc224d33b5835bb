import sys

from stratrelease.cli import main

sys.exit(main())
