from kac_lab.cli import main

main(prog_name="kac_lab")
