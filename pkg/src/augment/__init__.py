'''Observation augmentations and the procedural augmentation-image source.'''
