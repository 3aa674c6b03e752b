import setuptools

with open('requirements.txt') as f:
    requirements = f.read().splitlines()

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setuptools.setup(name='vecc',
                 version='0.1.0',
                 description='Compilation of causal graphs into arithmetic circuits by variable elimination with '
                             'replicated and thinned mechanisms, with causal inference and parameter estimation '
                             'on the compiled circuits',
                 long_description=long_description,
                 long_description_content_type="text/markdown",
                 packages=setuptools.find_packages(exclude=["tests", "scripts"]),
                 install_requires=requirements,
                 entry_points={"console_scripts": ["vecc=vecc.cli:main"]}
                 )
