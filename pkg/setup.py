import os

from setuptools import Extension, setup

# The compiled transform kernel is optional: the package falls back to a
# numpy implementation at import time.  Set GLHSP_NO_EXT=1 to skip the build.
ext_modules = []
if not os.environ.get("GLHSP_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "glhsp._transform_c",
                    sources=["src/glhsp/_transform_c.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level="3",
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
