import sys

from polarfuse.cli import main

sys.exit(main())
