"Unit tests for GAL, run with pytest gal/test"
