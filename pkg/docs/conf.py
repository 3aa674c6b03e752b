# -*- coding: utf-8 -*-
#
# Configuration file for the Sphinx documentation builder of vecc.

import os
import sys

sys.path.insert(0, os.path.abspath(os.path.join('..', 'vecc')))
sys.path.insert(0, os.path.abspath("../"))

project = 'vecc'
author = 'vecc developers'
copyright = '2026, ' + author
version = '0.1'
release = '0.1.0'

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.viewcode',
    'sphinx.ext.napoleon',
    'sphinx.ext.mathjax',
    'myst_parser'
]

# Docstrings follow the Google style with Args/Returns/Raises sections.
napoleon_google_docstring = True
napoleon_numpy_docstring = False
autodoc_member_order = 'bysource'

templates_path = ['_templates']
source_suffix = ['.rst', '.md']
master_doc = 'index'
language = 'en'
exclude_patterns = ['_build']

html_theme = 'alabaster'
html_static_path = []
htmlhelp_basename = 'veccdoc'

latex_documents = [
    (master_doc, 'vecc.tex', 'vecc Documentation', author, 'manual'),
]

man_pages = [
    (master_doc, 'vecc', 'vecc Documentation', [author], 1)
]
