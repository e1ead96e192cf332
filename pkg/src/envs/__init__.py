'''Synthetic visual reacher with procedural distraction tiers.'''
