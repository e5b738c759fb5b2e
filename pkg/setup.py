from setuptools import setup, find_packages

setup(
    name='satgen',
    version='0.1.0',
    packages=find_packages(exclude=['tests', 'examples', 'examples.*']),
    py_modules=['main', 'markov', 'seeding'],
    python_requires='>=3.10',
    install_requires=['pandas>=2.2', 'numpy>=2.0', 'scipy>=1.14'],
    entry_points={'console_scripts': ['satgen=main:main']},
    description='SAT-based synthetic haplotype generation and privacy auditing.',
    long_description=open('README.md').read(),
    long_description_content_type='text/markdown',
)
