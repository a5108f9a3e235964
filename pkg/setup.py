"""Build script: compiles the optional LSTM gate kernels.

The compiled extension is a pure speedup; if Cython or a C compiler is
missing the package installs anyway and falls back to the NumPy kernels.
"""

from setuptools import setup

try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    extensions = cythonize(
        [
            Extension(
                "dancesig.neural._gatekernels",
                ["src/dancesig/neural/_gatekernels.pyx"],
                include_dirs=[np.get_include(), "src/dancesig/neural"],
                depends=["src/dancesig/neural/_gatemath.h"],
                # no-trapping/no-errno are value-safe: they permit
                # if-conversion and SIMD without changing any result bits;
                # march=native is fine for a source-built extension
                extra_compile_args=[
                    "-O3", "-fno-trapping-math", "-fno-math-errno",
                    "-march=native",
                ],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
