from setuptools import setup

# The compiled path walker is optional: without Cython (or a compiler) the
# package falls back to the numpy implementation selected in hullproj.kernels.
ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("hullproj._cauchy", ["src/hullproj/_cauchy.pyx"])],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
