import sys

from confocal.main import main

sys.exit(main())
