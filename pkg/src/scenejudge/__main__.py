import sys

from scenejudge.cli import main

sys.exit(main())
