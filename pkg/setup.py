"""
Release check list:
1. Bump `__version__` in `pd_dual/__init__.py` and `version` below.
2. Run the test suite: `pytest tests`.
3. Build the sources and the wheel: `python setup.py sdist bdist_wheel`.
4. Check the upload on the test server first:
   twine upload dist/* -r pypitest
5. Upload the final version:
   twine upload dist/* -r pypi
"""

import setuptools

with open("README.md", "r") as fh:
    long_description = fh.read()

install_requires = ["numpy>=1.25", "scipy", "mpmath", "rich"]

extras_require = {"test": ["pytest", "hypothesis"]}

setuptools.setup(
    name="poisson-dirichlet-dual",
    version="0.1.0",
    description="Exact and Monte-Carlo tools for the two-parameter Poisson-Dirichlet diffusion and its dual death process",
    long_description=long_description,
    long_description_content_type="text/markdown",
    keywords="Poisson-Dirichlet Ewens-Pitman duality Polya urn integer partitions coalescent diffusion",
    packages=setuptools.find_packages(exclude=["tests", "examples", "examples.*"]),
    include_package_data=True,
    license="Apache",
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: Apache Software License",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    install_requires=install_requires,
    extras_require=extras_require,
    entry_points={"console_scripts": ["pd-dual=pd_dual.cli:main"]},
    python_requires=">=3.8",
)
