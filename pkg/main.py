"""
Ponto de entrada principal do dgalab.
Este arquivo serve como bridge para a CLI definida em cli.py.
"""
from cli import app

if __name__ == "__main__":
    app()
