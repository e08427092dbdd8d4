"""Build shim: compiles the optional route-search extension when Cython is present."""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    extensions = [
        Extension("shuttlekit.kernel._native", ["src/shuttlekit/kernel/_native.pyx"]),
    ]
    ext_modules = cythonize(extensions, language_level="3")

setup(ext_modules=ext_modules)
