from search_assist.cli import app

app(prog_name="search-assist")
