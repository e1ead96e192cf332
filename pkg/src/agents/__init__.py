'''SAC agent core and its augmentation/masking variants.'''
