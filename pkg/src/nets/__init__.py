'''Masker, encoder, actor, critic and parameter-set utilities.'''
