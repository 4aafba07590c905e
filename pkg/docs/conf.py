# Configuration file for the Sphinx documentation builder.
import os
import sys

sys.path.insert(0, os.path.abspath('..'))

# General information about the project.
project = 'psflab'
copyright = '2026, psflab developers'
author = 'psflab developers'
release = '1.0.0'

version = '1.0.0'
# General configuration
extensions = ["sphinx.ext.autodoc", "sphinx.ext.napoleon", "sphinx.ext.viewcode"]

templates_path = ['_templates']
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store', 'tests']
add_module_names = False

# Options for HTML output
html_theme = 'sphinx_rtd_theme'
