"""
Persistência em arquivos do dgalab.
"""

from app.crud.crud_corpus import corpus
from app.crud.crud_table import table
from app.crud.crud_matrix import matrix
from app.crud.crud_model import model
from app.crud.crud_filter import filter_store
from app.crud.crud_report import report
