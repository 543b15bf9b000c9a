import sys

from spt_rgbd.cli import main

sys.exit(main())
