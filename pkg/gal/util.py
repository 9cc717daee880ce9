"Utility functions for GAL."

import os
import re

from gal.log import debug

# Numeric helpers

def checkInt( s ):
    "Check if input string is an int"
    try:
        int( s )
        return True
    except ValueError:
        return False

def checkFloat( s ):
    "Check if input string is a float"
    try:
        float( s )
        return True
    except ValueError:
        return False

def makeNumeric( s ):
    "Convert string to int or float if numeric."
    if checkInt( s ):
        return int( s )
    elif checkFloat( s ):
        return float( s )
    else:
        return s

# Sorting and naming

def natural( text ):
    "To sort sanely/alphabetically: sorted( l, key=natural )"
    def num( s ):
        "Convert text segment to int if necessary"
        return int( s ) if s.isdigit() else s
    return [ num( s ) for s in re.split( r'(\d+)', str( text ) ) ]

# Suffixes that tie the files of one scene together
SUFFIXES = ( '_truth', '_codes', '_colors', '_overlay', '_boxes',
             '_gav', '_vprobs', '_energy', '_segments', '_pline', '_edge',
             '_defocus', '_units' )

def stemOf( path ):
    """Return the scene stem of a file name
       path: e.g. 'out/scene007_truth.pgm'
       returns: 'scene007'"""
    stem = os.path.splitext( os.path.basename( path ) )[ 0 ]
    for suffix in SUFFIXES:
        if stem.endswith( suffix ):
            return stem[ : -len( suffix ) ]
    return stem

def splitList( argstr ):
    "Split a comma separated option value into a list of names"
    return [ s.strip() for s in argstr.split( ',' ) if s.strip() ]

# Concurrency

def numThreads():
    """Return the batch concurrency: GAL_THREADS if set, else the
       number of CPU cores"""
    value = os.environ.get( 'GAL_THREADS' )
    if value is not None and checkInt( value ) and int( value ) > 0:
        return int( value )
    if value is not None:
        debug( '*** ignoring invalid GAL_THREADS=%s\n' % value )
    return os.cpu_count() or 1
