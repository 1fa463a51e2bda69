from peewee import DatabaseProxy

# Store a reference to the run registry database.
# This proxy must be initialised before it can be used, see open_registry for reference.
navsecure_database_proxy = DatabaseProxy()
