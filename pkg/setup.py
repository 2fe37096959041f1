import os

from setuptools import Extension, setup

# The assignment kernel ships both as a Cython extension and as a pure-Python
# module; the package falls back to the latter when the extension is absent,
# so a failed build here only costs speed.  Set DBDETECT_PURE_PYTHON=1 to
# skip compilation entirely.
ext_modules = []
if not os.environ.get("DBDETECT_PURE_PYTHON"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("dbdetect._sap_cy", ["src/dbdetect/_sap_cy.pyx"])],
            language_level=3,
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
