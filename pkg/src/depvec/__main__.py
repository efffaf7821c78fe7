from depvec.cli import main
import sys

sys.exit(main())
