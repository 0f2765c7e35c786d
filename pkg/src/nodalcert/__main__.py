import sys

from nodalcert.cli import main

sys.exit(main())
