from setuptools import setup

setup(
   name='attofox',
   version='1.0',
   description='Simulation and analysis of prey extinction in a fast-slow prey-predator model.',
   author='Morris Animal Foundation',
   author_email='information-systems@morrisanimalfoundation.org',
   packages=['attofox'],
   install_requires=['rich', 'pandas', 'numpy', 'numba', 'scipy', 'joblib', 'isort', 'flake8'],
   entry_points={
      'console_scripts': ['attofox = attofox.cli:main'],
   },
)
