import sys

from exprtune.cli import main

sys.exit(main())
