import sys

from phdae.cli.app import main

sys.exit(main())
