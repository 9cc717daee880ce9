"GAL: geometric layout labeling of outdoor scene images"

VERSION = '1.0.0'
