import sys

from dfop_stream.cli import main

sys.exit(main())
