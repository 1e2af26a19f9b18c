from credex.cli import app

app(prog_name="credex")
