'''Pydantic schemas and environment settings of the lab.'''
