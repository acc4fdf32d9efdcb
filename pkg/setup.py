from setuptools import setup

setup(
    name="qimanifold",
    version="0.1.0",
    py_modules=[
        "audit",
        "cli",
        "config",
        "ensemble",
        "errors",
        "expansional",
        "geometry",
        "interchange",
        "models",
        "norms",
        "spectral",
    ],
    packages=["utils"],
    install_requires=[
        "click>=8.0",
        "numpy>=1.24",
        "scipy>=1.10",
    ],
    python_requires=">=3.11",
    entry_points={
        "console_scripts": [
            "qimanifold=cli:main",
        ],
    },
)
