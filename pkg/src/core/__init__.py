'''Domain types, deterministic randomness and the replay buffer.'''
