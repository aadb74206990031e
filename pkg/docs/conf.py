"""Sphinx configuration for the gpgraph docs."""

import os
import sys

sys.path.insert(0, os.path.abspath(".."))

import gpgraph

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.autosummary",
    "sphinx.ext.mathjax",
    "sphinx.ext.napoleon",
    "sphinx.ext.viewcode",
    "sphinxcontrib.autodoc_pydantic",
    "sphinxcontrib.programoutput",
]
templates_path = ["_templates"]
master_doc = "index"
exclude_patterns = ["_build"]

project = "gpgraph"
author = "gpgraph Developers"
copyright = "2024, gpgraph Developers"
version = release = gpgraph.__version__

html_theme = "pydata_sphinx_theme"
html_theme_options = {
    "collapse_navigation": True,
    "show_nav_level": 2,
    "secondary_sidebar_items": ["page-toc", "sourcelink"],
}
html_sidebars = {"**": ["globaltoc.html"]}

autoclass_content = "class"
autosummary_generate = True
autodoc_pydantic_model_show_json = False
autodoc_pydantic_model_show_config_summary = False
