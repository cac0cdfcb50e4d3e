from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

with open("requirements.txt", "r", encoding="utf-8") as fh:
    requirements = fh.read().split("# Testing dependencies")[0].split()

setup(
    name="bn_reduction",
    version="0.1.0",
    description="Finite-dimensional reduction for blow-up solutions of Brezis-Nirenberg problems",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=("tests", "examples", "examples.*")),
    py_modules=["app"],
    package_data={"config": ["default_config.yaml"], "schemas": ["report-schema.json"]},
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.11",
    ],
    python_requires=">=3.10",
    install_requires=requirements,
    entry_points={
        "console_scripts": [
            "bn-reduction=app:main",
        ],
    },
)
