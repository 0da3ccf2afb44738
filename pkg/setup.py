from setuptools import Extension, setup

# The compiled kernel is optional: without a C toolchain the package falls
# back to the pure-Python engine selected at import time.  -ffp-contract=off
# forbids FMA contraction and -fno-builtin-* stops GCC from fusing separate
# sin/cos calls into glibc sincos (which can differ by 1 ulp), so both
# engines produce bit-identical trajectories.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "telearm._core._engine",
                ["src/telearm/_core/_engine.pyx"],
                extra_compile_args=[
                    "-O2",
                    "-ffp-contract=off",
                    "-fno-builtin-sin",
                    "-fno-builtin-cos",
                    "-fno-builtin-sincos",
                ],
                optional=True,
            )
        ],
        compiler_directives={"language_level": 3},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
