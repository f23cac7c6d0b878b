"""
Punto de entrada de la CLI
Uso: python main.py run --stream sea --mu 1e-3
"""

import sys

from dfop_stream.cli import main

if __name__ == "__main__":
    sys.exit(main())
