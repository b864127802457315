from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; textguard.kernels falls back
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "textguard._kernels",
                ["src/textguard/_kernels.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
    )

setup(ext_modules=ext_modules)
