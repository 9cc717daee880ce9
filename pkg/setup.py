#!/usr/bin/env python

"Setuptools params"

from setuptools import setup
from os.path import join

# Get version number from source tree
import sys
sys.path.append( '.' )
from gal import VERSION

scripts = [ join( 'bin', filename ) for filename in [ 'gal' ] ]

modname = distname = 'gal'

setup(
    name=distname,
    version=VERSION,
    description='Geometric layout labeling of outdoor scene images.',
    packages=[ 'gal', 'gal.test' ],
    long_description="""
        GAL labels every pixel of an outdoor image with one of seven
        geometric classes (support, planar left/center/right, porous,
        solid, sky). A two-stage super-pixel classifier gives the
        initial labeling, seven global attributes of the scene are
        extracted from it, and a CRF over the segments fuses both and
        is minimized with alpha-expansion graph cuts.
        """,
    classifiers=[
          "License :: OSI Approved :: BSD License",
          "Programming Language :: Python",
          "Programming Language :: Python :: 3",
          "Intended Audience :: Science/Research",
          "Topic :: Scientific/Engineering :: Image Recognition",
    ],
    keywords='scene layout geometric context CRF graph cut segmentation',
    license='BSD',
    python_requires='>=3.8',
    install_requires=[
        'setuptools',
        'pytest',
        'more-itertools',
        'numpy',
        'scipy',
        'scikit-image>=0.19',
        'scikit-learn',
        'opencv-python-headless',
        'PyMaxflow',
    ],
    scripts=scripts,
)
