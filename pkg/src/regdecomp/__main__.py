import sys

from regdecomp.cli import main

sys.exit(main())
