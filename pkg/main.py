import sys

from geodesic_lab_experiments.cli import main

if __name__ == "__main__":
    sys.exit(main())
