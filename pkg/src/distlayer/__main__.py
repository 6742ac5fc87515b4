import sys

from distlayer.cli import main

sys.exit(main())
