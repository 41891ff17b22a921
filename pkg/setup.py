import os

from setuptools import setup

ext_modules = []
if os.environ.get("LOTTERYNET_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("lotterynet._kernels", ["src/lotterynet/_kernels.pyx"])],
            compiler_directives={"language_level": "3", "boundscheck": False,
                                 "wraparound": False},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
