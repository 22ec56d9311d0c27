"""Build script for the optional compiled kernel extension.

The package is fully functional without the extension (a pure-numpy
backend is selected at import time), so the extension is marked
optional: a missing compiler degrades to the fallback instead of
failing the install.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "fewshot_intent._kernels._cykernels",
                ["src/fewshot_intent/_kernels/_cykernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # no-trapping-math drops FP-exception-flag ordering (values
                # stay IEEE; NaN/inf checks unaffected) so the elementwise
                # loops vectorize; it is NOT -ffast-math.
                extra_compile_args=["-O3", "-fno-trapping-math"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
