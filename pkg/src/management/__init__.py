"""
Management package: the click commands behind the mced CLI.
"""
